#ifndef NERVEPP_NERVEPP_HPP
#define NERVEPP_NERVEPP_HPP

// Umbrella header: pulls in the whole library.

#include "nervepp/abc.hpp"
#include "nervepp/envelopes.hpp"
#include "nervepp/errors.hpp"
#include "nervepp/geometry.hpp"
#include "nervepp/io.hpp"
#include "nervepp/parallel.hpp"
#include "nervepp/pattern.hpp"
#include "nervepp/rng.hpp"
#include "nervepp/simulate.hpp"
#include "nervepp/summaries.hpp"
#include "nervepp/svg.hpp"
#include "nervepp/territory.hpp"
#include "nervepp/thinning.hpp"

#endif // NERVEPP_NERVEPP_HPP
