#include "antifor/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace antifor {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw std::invalid_argument("tensor extent must be positive, got " + shape_to_string(shape));
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<int> s, float fill) {
    std::int64_t n = shape_numel(s);
    shape = std::move(s);
    data.assign(static_cast<std::size_t>(n), fill);
}

Tensor Tensor::scalar(float v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
}

Tensor Tensor::from_values(std::vector<int> s, std::vector<float> values) {
    if (shape_numel(s) != static_cast<std::int64_t>(values.size())) {
        throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                    " does not match shape " + shape_to_string(s));
    }
    Tensor t;
    t.shape = std::move(s);
    t.data = std::move(values);
    return t;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

bool all_finite(const Tensor& t) {
    for (float v : t.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace antifor
