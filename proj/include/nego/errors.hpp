#pragma once

#include <stdexcept>
#include <string>

namespace nego {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct shape_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ingestion_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct training_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct scenario_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace nego
