#pragma once

#include "oakes_hmm/bootstrap.hpp"
#include "oakes_hmm/dataset.hpp"
#include "oakes_hmm/em.hpp"
#include "oakes_hmm/errors.hpp"
#include "oakes_hmm/information.hpp"
#include "oakes_hmm/io.hpp"
#include "oakes_hmm/param_space.hpp"
#include "oakes_hmm/recursions.hpp"
#include "oakes_hmm/rng.hpp"
