#pragma once

#include "cgfbound/bounds.hpp"
#include "cgfbound/comparator.hpp"
#include "cgfbound/conjugate.hpp"
#include "cgfbound/corrections.hpp"
#include "cgfbound/error.hpp"
#include "cgfbound/families.hpp"
#include "cgfbound/inversion.hpp"
#include "cgfbound/lambert.hpp"
#include "cgfbound/numeric.hpp"
#include "cgfbound/parallel.hpp"
#include "cgfbound/report.hpp"
#include "cgfbound/rng.hpp"
#include "cgfbound/upsilon.hpp"
#include "cgfbound/verify.hpp"
