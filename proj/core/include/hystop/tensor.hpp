#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace hystop {

int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

/// Dense row-major n-d array of 64-bit reals. All model math runs in
/// double precision so gradient checks stay meaningful.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);
    Tensor(std::vector<int> s, double fill);
    Tensor(std::vector<int> s, std::vector<double> d);

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, double v) { return Tensor(std::move(s), v); }
    static Tensor row(std::initializer_list<double> v);

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    /// Extent of dimension i; negative i counts from the back.
    int dim(int i) const;

    double& at(std::initializer_list<int> idx);
    double at(std::initializer_list<int> idx) const;

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

/// Throws a Dimension error naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

} // namespace hystop
