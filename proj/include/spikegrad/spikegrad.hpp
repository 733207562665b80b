#pragma once

#include "spikegrad/data.hpp"
#include "spikegrad/error.hpp"
#include "spikegrad/exp_sum.hpp"
#include "spikegrad/forward.hpp"
#include "spikegrad/gradcheck.hpp"
#include "spikegrad/gradients.hpp"
#include "spikegrad/io.hpp"
#include "spikegrad/kernels.hpp"
#include "spikegrad/loss.hpp"
#include "spikegrad/network.hpp"
#include "spikegrad/oracle.hpp"
#include "spikegrad/parallel.hpp"
#include "spikegrad/train.hpp"
