#include "npamp/dataset.hpp"

#include "npamp/errors.hpp"

namespace npamp {

void validate(const Dataset& data) {
  require(data.x.rows() == data.y.size(), "dataset: design row count must equal length of y");
  require(data.n() >= 2, "dataset: need at least 2 observations");
  require(data.p() >= 1, "dataset: need at least 1 predictor");
  require(data.y.allFinite(), "dataset: response contains non-finite values");
  require(data.x.allFinite(), "dataset: design contains non-finite values");
  require(data.names.empty() || static_cast<Eigen::Index>(data.names.size()) == data.p(),
          "dataset: predictor name count must equal p");
}

}  // namespace npamp
