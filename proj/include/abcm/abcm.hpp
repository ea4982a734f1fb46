#pragma once

#include "abcm/format.hpp"
#include "abcm/graph.hpp"
#include "abcm/harness.hpp"
#include "abcm/io.hpp"
#include "abcm/metrics.hpp"
#include "abcm/models.hpp"
#include "abcm/properties.hpp"
#include "abcm/random.hpp"
