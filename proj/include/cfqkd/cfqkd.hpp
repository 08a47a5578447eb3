#pragma once

#include "cfqkd/adversary.hpp"
#include "cfqkd/analysis.hpp"
#include "cfqkd/config.hpp"
#include "cfqkd/experiment.hpp"
#include "cfqkd/protocol.hpp"
#include "cfqkd/quantum.hpp"
#include "cfqkd/rng.hpp"
#include "cfqkd/sweep.hpp"
#include "cfqkd/verify.hpp"
