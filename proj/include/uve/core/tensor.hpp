/* Copyright (c) 2026 The uvenet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#ifndef UVE_CORE_TENSOR_HPP_
#define UVE_CORE_TENSOR_HPP_

#include <atomic>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace uve {

class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Running total / high-water mark of live tensor payload bytes.
// Scratch buffers inside ops are not counted; this meters the working set
// of tensors held by a forward/backward pass, which is what the benchmark
// harness reports.
class MemoryMeter {
public:
    static std::atomic<std::size_t>& current() {
        static std::atomic<std::size_t> v{0};
        return v;
    }
    static std::atomic<std::size_t>& peak() {
        static std::atomic<std::size_t> v{0};
        return v;
    }
    static void add(std::size_t bytes) {
        std::size_t now = current().fetch_add(bytes) + bytes;
        std::size_t prev = peak().load();
        while (prev < now && !peak().compare_exchange_weak(prev, now)) {
        }
    }
    static void sub(std::size_t bytes) { current().fetch_sub(bytes); }
    static void reset_peak() { peak().store(current().load()); }
    static std::size_t peak_bytes() { return peak().load(); }
    static std::size_t current_bytes() { return current().load(); }
};

template <typename T>
class MeteredAllocator {
public:
    using value_type = T;
    MeteredAllocator() = default;
    template <typename U>
    MeteredAllocator(const MeteredAllocator<U>&) {}
    T* allocate(std::size_t n) {
        MemoryMeter::add(n * sizeof(T));
        return static_cast<T*>(::operator new(n * sizeof(T)));
    }
    void deallocate(T* p, std::size_t n) {
        MemoryMeter::sub(n * sizeof(T));
        ::operator delete(p);
    }
    bool operator==(const MeteredAllocator&) const { return true; }
    bool operator!=(const MeteredAllocator&) const { return false; }
};

// 4-axis shape (count, channels, height, width).
struct Shape {
    int64_t n = 0;
    int64_t c = 0;
    int64_t h = 0;
    int64_t w = 0;

    int64_t count() const { return n * c * h * w; }
    bool operator==(const Shape& o) const = default;

    std::string str() const {
        std::ostringstream os;
        os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
        return os.str();
    }
};

enum class ValueRange { pixel, feature };

// Dense NCHW tensor. The value_range tag declares whether the contents are
// pixels in [0,1] or unbounded features; it is bookkeeping only and never
// changes the stored numbers.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape s, ValueRange range = ValueRange::feature)
        : shape_(s), range_(range), data_(static_cast<std::size_t>(s.count()), T(0)) {
        if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
            throw ShapeError("tensor: negative axis in shape " + s.str());
    }

    static Tensor zeros(Shape s, ValueRange range = ValueRange::feature) { return Tensor(s, range); }
    static Tensor full(Shape s, T v, ValueRange range = ValueRange::feature) {
        Tensor t(s, range);
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    const Shape& shape() const { return shape_; }
    ValueRange range() const { return range_; }
    void set_range(ValueRange r) { range_ = r; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    int64_t index(int64_t n, int64_t c, int64_t y, int64_t x) const {
        return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
    }
    T& at(int64_t n, int64_t c, int64_t y, int64_t x) { return data_[index(n, c, y, x)]; }
    const T& at(int64_t n, int64_t c, int64_t y, int64_t x) const { return data_[index(n, c, y, x)]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(T(0)); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_, range_);
        for (int64_t i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[static_cast<std::size_t>(i)]);
        return out;
    }

private:
    Shape shape_{};
    ValueRange range_ = ValueRange::feature;
    std::vector<T, MeteredAllocator<T>> data_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

}  // namespace uve

#endif  // UVE_CORE_TENSOR_HPP_
