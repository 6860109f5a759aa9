#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace voxrecon {

/// Malformed or inconsistent input data (file headers, payload sizes, shapes).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A metric is mathematically undefined for the given inputs (e.g. zero variance).
class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The optimizer produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, std::size_t batch, const std::string& what)
        : std::runtime_error(what), epoch_(epoch), batch_(batch) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

} // namespace voxrecon
