// gmmdiag/gmmdiag.hpp
//
// Convenience header for the whole library.

#pragma once

#include "gmmdiag/config.hpp"
#include "gmmdiag/csv.hpp"
#include "gmmdiag/dataset.hpp"
#include "gmmdiag/em.hpp"
#include "gmmdiag/errors.hpp"
#include "gmmdiag/inference.hpp"
#include "gmmdiag/kmeans.hpp"
#include "gmmdiag/likelihood.hpp"
#include "gmmdiag/model.hpp"
#include "gmmdiag/parallel.hpp"
#include "gmmdiag/synthetic.hpp"
