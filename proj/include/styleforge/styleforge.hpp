#pragma once

#include "styleforge/autograd.hpp"
#include "styleforge/bpe.hpp"
#include "styleforge/checkpoint.hpp"
#include "styleforge/config.hpp"
#include "styleforge/corpus.hpp"
#include "styleforge/error.hpp"
#include "styleforge/lexstyle.hpp"
#include "styleforge/metrics.hpp"
#include "styleforge/model.hpp"
#include "styleforge/noise.hpp"
#include "styleforge/optim.hpp"
#include "styleforge/report.hpp"
#include "styleforge/rng.hpp"
#include "styleforge/synstyle.hpp"
#include "styleforge/text.hpp"
#include "styleforge/train.hpp"
