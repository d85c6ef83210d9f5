#pragma once

#include "cex/classifier.hpp"
#include "cex/error.hpp"
#include "cex/explanation.hpp"
#include "cex/floodlight.hpp"
#include "cex/image.hpp"
#include "cex/landscape.hpp"
#include "cex/netpbm.hpp"
#include "cex/oracle.hpp"
#include "cex/partition.hpp"
#include "cex/pipeline.hpp"
#include "cex/responsibility.hpp"
#include "cex/rng.hpp"
#include "cex/subprocess_classifier.hpp"
