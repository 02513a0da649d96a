#pragma once

#include "syncsol/boxes.hpp"
#include "syncsol/branches.hpp"
#include "syncsol/bubble.hpp"
#include "syncsol/conditions.hpp"
#include "syncsol/counting.hpp"
#include "syncsol/io.hpp"
#include "syncsol/oracle.hpp"
#include "syncsol/params.hpp"
