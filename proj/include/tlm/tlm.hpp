#pragma once

// Tessellated linear model: umbrella header.

#include "tlm/baselines.hpp"
#include "tlm/common.hpp"
#include "tlm/dataset.hpp"
#include "tlm/feature_net.hpp"
#include "tlm/linear.hpp"
#include "tlm/metrics.hpp"
#include "tlm/mixup.hpp"
#include "tlm/model.hpp"
#include "tlm/model_io.hpp"
#include "tlm/nn.hpp"
#include "tlm/routing.hpp"
#include "tlm/synthetic.hpp"
#include "tlm/tree.hpp"
