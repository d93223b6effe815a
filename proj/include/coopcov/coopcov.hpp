// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "coopcov/channel.hpp"
#include "coopcov/coverage.hpp"
#include "coopcov/errors.hpp"
#include "coopcov/geometry.hpp"
#include "coopcov/interference.hpp"
#include "coopcov/params.hpp"
#include "coopcov/simulator.hpp"
