#pragma once

#include "dirform/core.hpp"
#include "dirform/forms.hpp"
#include "dirform/medm.hpp"
#include "dirform/riemann.hpp"
#include "dirform/kusuoka.hpp"
#include "dirform/stoch.hpp"
#include "dirform/io.hpp"
#include "dirform/checks.hpp"
