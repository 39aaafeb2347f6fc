// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
