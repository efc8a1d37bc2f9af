#pragma once

#include "serifu/classify.hpp"
#include "serifu/config.hpp"
#include "serifu/corpus.hpp"
#include "serifu/error.hpp"
#include "serifu/patterns.hpp"
#include "serifu/pipeline.hpp"
#include "serifu/rng.hpp"
#include "serifu/subword.hpp"
#include "serifu/synth.hpp"
#include "serifu/unicode.hpp"
