#pragma once

#include <cassert>

#define DISALLOW_COPY(cname)     \
  cname(const cname &) = delete; \
  cname &operator=(const cname &) = delete

#define DISALLOW_COPY_AND_MOVE(cname) \
  DISALLOW_COPY(cname);               \
  cname(cname &&) = delete;           \
  cname &operator=(cname &&) = delete

#define MVCOL_ASSERT(expr, message) assert((expr) && (message))
