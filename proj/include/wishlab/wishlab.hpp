#ifndef WISHLAB_WISHLAB_HPP
#define WISHLAB_WISHLAB_HPP

#include "wishlab/errors.hpp"
#include "wishlab/functional.hpp"
#include "wishlab/increments.hpp"
#include "wishlab/kernels.hpp"
#include "wishlab/sampler.hpp"
#include "wishlab/spectra.hpp"
#include "wishlab/stats.hpp"

#endif // WISHLAB_WISHLAB_HPP
