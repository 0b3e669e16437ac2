#pragma once

#include "cvtomo/bench.hpp"
#include "cvtomo/config.hpp"
#include "cvtomo/error.hpp"
#include "cvtomo/fisher.hpp"
#include "cvtomo/fock.hpp"
#include "cvtomo/ggm.hpp"
#include "cvtomo/io.hpp"
#include "cvtomo/measurement.hpp"
#include "cvtomo/mle.hpp"
#include "cvtomo/parallel.hpp"
#include "cvtomo/random.hpp"
#include "cvtomo/sim.hpp"
#include "cvtomo/states.hpp"
#include "cvtomo/types.hpp"
