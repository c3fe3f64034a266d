/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <benchmark/benchmark.h>

BENCHMARK_MAIN();
