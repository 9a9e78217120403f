#pragma once

#include "addow/addow.hpp"
#include "addow/classic.hpp"
#include "addow/estimation.hpp"
#include "addow/harness.hpp"
#include "addow/model.hpp"
#include "addow/normal.hpp"
#include "addow/oracle.hpp"
#include "addow/rng.hpp"
#include "addow/stabilize.hpp"
#include "addow/stepup.hpp"
