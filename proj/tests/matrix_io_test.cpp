// Copyright 2026 The rpd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rpd/matrix_io.hpp"

#include <sstream>

#include <gtest/gtest.h>

#include "rpd/errors.hpp"

namespace rpd {
namespace {

TEST(MatrixCsv, RoundTripsExactly) {
  Matrix m(2, 3);
  m << 0.1, -2.5e-300, 3.0, 1.0 / 3.0, 7e10, -0.0;
  std::ostringstream out;
  write_matrix_csv(out, m);
  std::istringstream in(out.str());
  const Matrix back = read_matrix_csv(in);
  ASSERT_EQ(back.rows(), 2);
  ASSERT_EQ(back.cols(), 3);
  EXPECT_TRUE(back == m);
}

TEST(MatrixCsv, RejectsBadInput) {
  std::istringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_matrix_csv(ragged), IoError);
  std::istringstream junk("1,x\n");
  EXPECT_THROW(read_matrix_csv(junk), IoError);
  std::istringstream empty("");
  EXPECT_THROW(read_matrix_csv(empty), IoError);
  std::istringstream blank_cell("1,,2\n");
  EXPECT_THROW(read_matrix_csv(blank_cell), IoError);
}

TEST(MatrixCsv, AcceptsCrLf) {
  std::istringstream in("1,2\r\n3,4\r\n");
  const Matrix m = read_matrix_csv(in);
  EXPECT_EQ(m(1, 0), 3.0);
}

TEST(MatrixJson, RoundTrips) {
  Matrix m(2, 2);
  m << 1.0, 0.25, 0.25, 1e-9;
  const std::string text = matrix_to_json(m);
  EXPECT_NE(text.find("\"dim\""), std::string::npos);
  EXPECT_TRUE(matrix_from_json(text) == m);
  EXPECT_THROW(matrix_to_json(Matrix::Zero(2, 3)), ArgumentError);
  EXPECT_THROW(matrix_from_json("{\"dim\": 2, \"data\": [1, 2, 3]}"), IoError);
  EXPECT_THROW(matrix_from_json("not json"), IoError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  const double third = 1.0 / 3.0;
  EXPECT_EQ(parse_double(format_double(third), "x"), third);
}

}  // namespace
}  // namespace rpd
