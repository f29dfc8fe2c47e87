#pragma once

#include "asfem/geometry.hpp"
#include "asfem/refquad.hpp"
#include "asfem/mesh.hpp"
#include "asfem/spaces.hpp"
#include "asfem/forms.hpp"
#include "asfem/resmin.hpp"
#include "asfem/analysis.hpp"
#include "asfem/bench.hpp"
#include "asfem/adapt.hpp"
#include "asfem/io.hpp"
#include "asfem/report.hpp"
