#pragma once

#include "deconv/error.hpp"
#include "deconv/estimators.hpp"
#include "deconv/golden_section.hpp"
#include "deconv/model_catalog.hpp"
#include "deconv/rates.hpp"
#include "deconv/risk_lab.hpp"
#include "deconv/spectral.hpp"
