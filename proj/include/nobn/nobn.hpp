#pragma once

#include "nobn/core.hpp"
#include "nobn/data.hpp"
#include "nobn/cpt_scoring.hpp"
#include "nobn/noisyor.hpp"
#include "nobn/pruning.hpp"
#include "nobn/search.hpp"
#include "nobn/inference.hpp"
#include "nobn/synth.hpp"
#include "nobn/io.hpp"
