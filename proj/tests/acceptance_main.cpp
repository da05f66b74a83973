/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include <cstdio>

int main() {
  std::puts("acceptance suite placeholder");
  return 1;
}
