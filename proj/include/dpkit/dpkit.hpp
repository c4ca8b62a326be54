#pragma once

#include "dpkit/errors.hpp"
#include "dpkit/numeric.hpp"
#include "dpkit/valued_field.hpp"
#include "dpkit/presburger.hpp"
#include "dpkit/formula.hpp"
#include "dpkit/parser.hpp"
#include "dpkit/evaluator.hpp"
#include "dpkit/measure.hpp"
#include "dpkit/quadext.hpp"
#include "dpkit/jacquet_rallis.hpp"
#include "dpkit/fixtures.hpp"
#include "dpkit/io.hpp"
#include "dpkit/transfer.hpp"
