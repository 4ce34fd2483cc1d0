#pragma once

#include "rasgw/estimators.hpp"
#include "rasgw/gradflow.hpp"
#include "rasgw/gw1d.hpp"
#include "rasgw/parallel.hpp"
#include "rasgw/point_cloud.hpp"
#include "rasgw/rapd.hpp"
#include "rasgw/rng.hpp"
#include "rasgw/sphere.hpp"
#include "rasgw/synthetic.hpp"
#include "rasgw/version.hpp"
