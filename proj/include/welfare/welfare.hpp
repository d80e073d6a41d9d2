#ifndef WELFARE_WELFARE_HPP
#define WELFARE_WELFARE_HPP

#include "welfare/config.hpp"
#include "welfare/csv.hpp"
#include "welfare/cv.hpp"
#include "welfare/errors.hpp"
#include "welfare/json_writer.hpp"
#include "welfare/math.hpp"
#include "welfare/mc_stats.hpp"
#include "welfare/parallel.hpp"
#include "welfare/policy.hpp"
#include "welfare/pum.hpp"
#include "welfare/report.hpp"
#include "welfare/rng.hpp"
#include "welfare/roy.hpp"
#include "welfare/simplex.hpp"
#include "welfare/superquantile.hpp"
#include "welfare/variational_lp.hpp"
#include "welfare/version.hpp"
#include "welfare/weighted_sample.hpp"

#endif
