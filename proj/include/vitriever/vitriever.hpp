#ifndef VITRIEVER_VITRIEVER_HPP
#define VITRIEVER_VITRIEVER_HPP

#include "error.hpp"
#include "store.hpp"
#include "normalization.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "search.hpp"
#include "eval.hpp"
#include "datasets.hpp"
#include "experiment.hpp"

#endif
