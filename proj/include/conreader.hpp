#pragma once

#include "conreader/common.hpp"
#include "conreader/autograd.hpp"
#include "conreader/tokenizer.hpp"
#include "conreader/data.hpp"
#include "conreader/definitions.hpp"
#include "conreader/encoder.hpp"
#include "conreader/memory.hpp"
#include "conreader/aggregator.hpp"
#include "conreader/model.hpp"
#include "conreader/pipeline.hpp"
#include "conreader/training.hpp"
#include "conreader/inference.hpp"
#include "conreader/metrics.hpp"
#include "conreader/synthetic.hpp"
#include "conreader/io.hpp"
