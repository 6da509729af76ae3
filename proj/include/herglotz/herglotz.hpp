#ifndef HERGLOTZ_HERGLOTZ_HPP
#define HERGLOTZ_HERGLOTZ_HPP

// Umbrella header.

#include "herglotz/algebroid.hpp"
#include "herglotz/brackets.hpp"
#include "herglotz/catalog.hpp"
#include "herglotz/config.hpp"
#include "herglotz/dynamics.hpp"
#include "herglotz/errors.hpp"
#include "herglotz/expr.hpp"
#include "herglotz/integrate.hpp"

#endif  // HERGLOTZ_HERGLOTZ_HPP
