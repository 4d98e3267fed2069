#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace antifor {

// Dense row-major float tensor. Shapes are small (desk-scale CNNs), so we
// keep the representation flat and copy freely.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, float fill = 0.0f);
    static Tensor scalar(float v);
    static Tensor from_values(std::vector<int> s, std::vector<float> values);

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    float& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    const float& operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }
};

std::string shape_to_string(const std::vector<int>& shape);
std::int64_t shape_numel(const std::vector<int>& shape);
bool all_finite(const Tensor& t);

}  // namespace antifor
