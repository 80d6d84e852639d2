#pragma once

#include "lumpnn/bench.hpp"
#include "lumpnn/ctmc.hpp"
#include "lumpnn/io.hpp"
#include "lumpnn/lump.hpp"
#include "lumpnn/nn.hpp"
#include "lumpnn/partition.hpp"
#include "lumpnn/quotient.hpp"
#include "lumpnn/relax.hpp"
