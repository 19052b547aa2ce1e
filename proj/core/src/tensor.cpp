#include "hystop/tensor.hpp"

#include <cmath>
#include <sstream>

#include "hystop/error.hpp"

namespace hystop {

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int s : shape) {
        if (s < 0) raise(ErrorKind::Dimension, "negative extent in shape " + shape_str(shape));
        n *= s;
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
}

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(shape_numel(shape)), fill);
}

Tensor::Tensor(std::vector<int> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
        raise(ErrorKind::Dimension,
              "tensor data length " + std::to_string(data.size()) +
                  " does not match shape " + shape_str(shape));
}

Tensor Tensor::row(std::initializer_list<double> v) {
    return Tensor({static_cast<int>(v.size())}, std::vector<double>(v));
}

int Tensor::dim(int i) const {
    int nd = ndim();
    if (i < 0) i += nd;
    if (i < 0 || i >= nd)
        raise(ErrorKind::Dimension,
              "dimension index " + std::to_string(i) + " out of range for " + shape_str(shape));
    return shape[static_cast<size_t>(i)];
}

namespace {
int64_t flat_offset(const std::vector<int>& shape, std::initializer_list<int> idx) {
    if (idx.size() != shape.size())
        raise(ErrorKind::Dimension, "index rank does not match tensor rank");
    int64_t off = 0;
    int d = 0;
    for (int i : idx) {
        if (i < 0 || i >= shape[static_cast<size_t>(d)])
            raise(ErrorKind::Dimension, "index out of bounds for " + shape_str(shape));
        off = off * shape[static_cast<size_t>(d)] + i;
        ++d;
    }
    return off;
}
} // namespace

double& Tensor::at(std::initializer_list<int> idx) {
    return data[static_cast<size_t>(flat_offset(shape, idx))];
}

double Tensor::at(std::initializer_list<int> idx) const {
    return data[static_cast<size_t>(flat_offset(shape, idx))];
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        raise(ErrorKind::Dimension, std::string(what) + ": shape mismatch " +
                                        shape_str(a.shape) + " vs " + shape_str(b.shape));
}

} // namespace hystop
