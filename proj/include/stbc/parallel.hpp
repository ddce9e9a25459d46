#pragma once

#include <functional>

namespace stbc {

// Worker count from STBC_FSD_THREADS (default 1). Work items must write only
// to their own slot so results are schedule independent.
int worker_threads();

void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace stbc
