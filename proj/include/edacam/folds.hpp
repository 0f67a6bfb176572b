#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <edacam/errors.hpp>

namespace edacam {

struct FoldSplit {
  std::string test_id;
  std::string val_id;
  std::vector<std::string> train_ids;
};

// leave-one-subject-out: each participant is the test subject exactly once,
// the next participant in sorted rotation holds out validation, everyone
// else trains
inline std::vector<FoldSplit> loso_splits(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 3)
    throw InsufficientDataError("loso_splits: need at least 3 participants");
  std::vector<FoldSplit> folds;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    FoldSplit f;
    f.test_id = ids[i];
    f.val_id = ids[(i + 1) % ids.size()];
    for (std::size_t j = 0; j < ids.size(); ++j)
      if (j != i && ids[j] != f.val_id) f.train_ids.push_back(ids[j]);
    folds.push_back(std::move(f));
  }
  return folds;
}

}  // namespace edacam
