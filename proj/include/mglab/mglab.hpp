#ifndef MGLAB_MGLAB_HPP
#define MGLAB_MGLAB_HPP

#include "mglab/best_response.hpp"
#include "mglab/common.hpp"
#include "mglab/config.hpp"
#include "mglab/estimation.hpp"
#include "mglab/game.hpp"
#include "mglab/harness.hpp"
#include "mglab/history.hpp"
#include "mglab/learners.hpp"
#include "mglab/ope.hpp"
#include "mglab/opponents.hpp"
#include "mglab/policy.hpp"
#include "mglab/reductions/lmdp.hpp"
#include "mglab/reductions/matching.hpp"
#include "mglab/reductions/pomdp.hpp"
#include "mglab/reductions/sat.hpp"
#include "mglab/value.hpp"
#include "mglab/verify.hpp"

#endif  // MGLAB_MGLAB_HPP
