#pragma once

#include "netforest/archive.hpp"
#include "netforest/cascade.hpp"
#include "netforest/core.hpp"
#include "netforest/featrank.hpp"
#include "netforest/flow.hpp"
#include "netforest/forest.hpp"
#include "netforest/logistic.hpp"
#include "netforest/metrics.hpp"
#include "netforest/pipeline.hpp"
#include "netforest/preprocess.hpp"
#include "netforest/resampling.hpp"
#include "netforest/scanning.hpp"
#include "netforest/tree.hpp"
