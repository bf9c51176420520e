// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_ZETT_HPP_
#define ZETT_ZETT_HPP_

#include "zett/backend.hpp"
#include "zett/checkpoint.hpp"
#include "zett/common.hpp"
#include "zett/data_model.hpp"
#include "zett/decoder.hpp"
#include "zett/evaluation.hpp"
#include "zett/pipeline.hpp"
#include "zett/prepare.hpp"
#include "zett/relation_filter.hpp"
#include "zett/seq2seq.hpp"
#include "zett/synthetic.hpp"
#include "zett/template_gen.hpp"
#include "zett/templates.hpp"
#include "zett/tokenizer.hpp"
#include "zett/train.hpp"
#include "zett/types.hpp"

#endif  // ZETT_ZETT_HPP_
