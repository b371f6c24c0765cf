#pragma once

// Umbrella header.

#include "automode/config.hpp"
#include "automode/datamodel.hpp"
#include "automode/ensemble.hpp"
#include "automode/error.hpp"
#include "automode/features.hpp"
#include "automode/gbm.hpp"
#include "automode/hpo.hpp"
#include "automode/labeling.hpp"
#include "automode/matrix.hpp"
#include "automode/metrics.hpp"
#include "automode/pipeline.hpp"
#include "automode/random.hpp"
#include "automode/report.hpp"
#include "automode/synth.hpp"
#include "automode/text.hpp"
#include "automode/training.hpp"
#include "automode/wav.hpp"
