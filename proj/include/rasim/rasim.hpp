#ifndef RASIM_RASIM_HPP
#define RASIM_RASIM_HPP

#include "rasim/config.hpp"
#include "rasim/corpus.hpp"
#include "rasim/encoder.hpp"
#include "rasim/errors.hpp"
#include "rasim/eval.hpp"
#include "rasim/gnn.hpp"
#include "rasim/metrics.hpp"
#include "rasim/pairs.hpp"
#include "rasim/phrasegen.hpp"
#include "rasim/pipeline.hpp"
#include "rasim/retrieval.hpp"
#include "rasim/text.hpp"
#include "rasim/training.hpp"
#include "rasim/universe.hpp"

#endif  // RASIM_RASIM_HPP
