#pragma once

// Structured (JSON) and tabular renderings of certificate results.

#include <ostream>

#include "feasik/certificates.hpp"
#include "feasik/config.hpp"

namespace feasik {

Json to_json(const A1Report& r);
Json to_json(const A2Report& r);
Json to_json(const DescentCertificate<double>& c, const std::vector<std::uint64_t>& fixed_point_failures = {});

void print_table(std::ostream& os, const A1Report& r);
void print_table(std::ostream& os, const A2Report& r);
void print_summary(std::ostream& os, const DescentCertificate<double>& c);

}  // namespace feasik
