/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "ntsp/bayesopt.hpp"
#include "ntsp/circuit.hpp"
#include "ntsp/collateral.hpp"
#include "ntsp/distribution.hpp"
#include "ntsp/error.hpp"
#include "ntsp/exact.hpp"
#include "ntsp/generator.hpp"
#include "ntsp/harness.hpp"
#include "ntsp/instance_io.hpp"
#include "ntsp/mitigation.hpp"
#include "ntsp/model.hpp"
#include "ntsp/penalty.hpp"
#include "ntsp/random.hpp"
