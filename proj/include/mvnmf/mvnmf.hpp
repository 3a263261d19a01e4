#pragma once

#include "mvnmf/cluster.hpp"
#include "mvnmf/core.hpp"
#include "mvnmf/dataviews.hpp"
#include "mvnmf/factorize.hpp"
#include "mvnmf/gradients.hpp"
#include "mvnmf/graph.hpp"
#include "mvnmf/harness.hpp"
#include "mvnmf/heuristics.hpp"
#include "mvnmf/metrics.hpp"
#include "mvnmf/serialize.hpp"
