#pragma once

#include "cmvt/dataset.hpp"
#include "cmvt/em.hpp"
#include "cmvt/errors.hpp"
#include "cmvt/linalg.hpp"
#include "cmvt/minnesota.hpp"
#include "cmvt/nu0.hpp"
#include "cmvt/params.hpp"
#include "cmvt/serialize.hpp"
#include "cmvt/simulate.hpp"
#include "cmvt/special.hpp"
#include "cmvt/type1.hpp"
#include "cmvt/type2.hpp"
#include "cmvt/version.hpp"
