// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cloformer/accounting.hpp"
#include "cloformer/attnconv.hpp"
#include "cloformer/checkpoint.hpp"
#include "cloformer/clo_block.hpp"
#include "cloformer/clot.hpp"
#include "cloformer/error.hpp"
#include "cloformer/gradcheck.hpp"
#include "cloformer/layers.hpp"
#include "cloformer/model.hpp"
#include "cloformer/ops.hpp"
#include "cloformer/random.hpp"
#include "cloformer/spectrum.hpp"
#include "cloformer/tensor.hpp"
#include "cloformer/train.hpp"
#include "cloformer/variant.hpp"
