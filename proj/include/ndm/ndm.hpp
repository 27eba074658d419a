#ifndef NDM_NDM_HPP
#define NDM_NDM_HPP

#include "ndm/bounds.hpp"
#include "ndm/graph.hpp"
#include "ndm/io.hpp"
#include "ndm/mle.hpp"
#include "ndm/model.hpp"
#include "ndm/quadform.hpp"
#include "ndm/rng.hpp"
#include "ndm/simlab.hpp"

#endif  // NDM_NDM_HPP
