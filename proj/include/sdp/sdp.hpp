#pragma once

#include "sdp/action.hpp"
#include "sdp/adamw.hpp"
#include "sdp/checkpoint.hpp"
#include "sdp/ddpm.hpp"
#include "sdp/engine.hpp"
#include "sdp/errors.hpp"
#include "sdp/network.hpp"
#include "sdp/policy.hpp"
#include "sdp/rng.hpp"
#include "sdp/sampler.hpp"
#include "sdp/shortcut.hpp"
#include "sdp/so3.hpp"
#include "sdp/toy_envs.hpp"
#include "sdp/trainer.hpp"
