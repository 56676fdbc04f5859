#pragma once

#include "csiloc/core/error.hpp"
#include "csiloc/core/parallel.hpp"
#include "csiloc/core/rng.hpp"
#include "csiloc/core/tensor.hpp"
#include "csiloc/data/dataset.hpp"
#include "csiloc/data/normalize.hpp"
#include "csiloc/data/npy.hpp"
#include "csiloc/data/split.hpp"
#include "csiloc/data/synthetic.hpp"
#include "csiloc/eval/metrics.hpp"
#include "csiloc/eval/report.hpp"
#include "csiloc/models/arch.hpp"
#include "csiloc/models/checkpoint.hpp"
#include "csiloc/nn/gradient_check.hpp"
#include "csiloc/nn/layer.hpp"
#include "csiloc/nn/network.hpp"
#include "csiloc/nn/ops.hpp"
#include "csiloc/train/loss.hpp"
#include "csiloc/train/optimizer.hpp"
#include "csiloc/train/trainer.hpp"
