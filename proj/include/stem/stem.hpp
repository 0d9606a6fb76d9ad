#pragma once

// Umbrella header.
#include "stem/corpus.hpp"
#include "stem/embed.hpp"
#include "stem/error.hpp"
#include "stem/eval.hpp"
#include "stem/graph.hpp"
#include "stem/greedy.hpp"
#include "stem/partition.hpp"
#include "stem/pca.hpp"
#include "stem/runner.hpp"
#include "stem/synth.hpp"
