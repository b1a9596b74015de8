#include "tables.hpp"

namespace torsion_cli {

const std::array<double, 3> kSigmaLevels{1e-4, 1e-3, 1e-2};

const std::array<DataConfig, 6> kDataConfigs{{
    {"1P", {0}},
    {"1P&1E", {0, 3}},
    {"2P", {0, 1}},
    {"2P&1E", {0, 1, 3}},
    {"3P", {0, 1, 2}},
    {"3P&1E", {0, 1, 2, 3}},
}};

namespace {

const ForwardTable kT1{
    "T1",
    0.02,
    42.3,
    {1.0, 0.5, 0.1, 0.005},
    {{"case1", 0.3, {2.5236, 1.3580, 0.3221, 0.0175}},
     {"case2", 0.7, {62.473, 21.693, 1.8607, 0.0175}}},
};

const ForwardTable kT5{
    "T5",
    0.027,
    80.77,
    {1.0, 0.5, 0.1, 0.003},
    {{"case1", 0.3, {5.3118, 2.8583, 0.6780, 0.0229}},
     {"case2", 0.7, {179.99, 62.500, 5.3610, 0.0229}}},
};

const InversionTable kT4{
    "T4",
    0.3,
    0.02,
    42.3,
    {42.0, 43.0},
    {1.0, 0.5, 0.1, 0.005},
    {{{5.96e-3, 6.17e-3, 6.18e-3},
      {3.90e-3, 3.91e-3, 3.95e-3},
      {9.45e-4, 1.89e-3, 2.88e-3},
      {7.09e-4, 2.13e-3, 2.85e-3},
      {1.18e-3, 1.65e-3, 2.37e-3},
      {7.01e-4, 1.57e-3, 2.61e-3}}},
};

const InversionTable kT6{
    "T6",
    0.7,
    0.02,
    42.3,
    {42.0, 43.0},
    {1.0, 0.5, 0.1, 0.005},
    {{{6.14e-3, 6.36e-3, 6.37e-3},
      {3.50e-3, 3.71e-3, 3.76e-3},
      {1.41e-3, 1.68e-3, 3.29e-3},
      {9.45e-4, 1.66e-3, 2.90e-3},
      {4.73e-4, 1.19e-3, 1.95e-3},
      {2.37e-4, 1.18e-3, 1.91e-3}}},
};

const InversionTable kT7{
    "T7",
    0.3,
    0.027,
    80.77,
    {80.0, 81.0},
    {1.0, 0.5, 0.1, 0.003},
    {{{2.14e-3, 2.14e-3, 2.14e-3},
      {1.89e-3, 2.03e-3, 2.21e-3},
      {2.35e-3, 2.22e-3, 2.60e-3},
      {1.11e-3, 1.36e-3, 1.74e-3},
      {8.66e-4, 1.36e-3, 1.48e-3},
      {6.19e-4, 1.23e-3, 1.38e-3}}},
};

const InversionTable kT8{
    "T8",
    0.7,
    0.027,
    80.77,
    {80.0, 81.0},
    {1.0, 0.5, 0.1, 0.003},
    {{{2.13e-3, 2.14e-3, 2.15e-3},
      {2.17e-3, 2.18e-3, 2.21e-3},
      {1.36e-3, 1.98e-3, 2.02e-3},
      {8.66e-4, 1.73e-3, 1.78e-3},
      {8.66e-4, 1.48e-3, 1.75e-3},
      {1.03e-4, 1.01e-3, 1.37e-3}}},
};

}  // namespace

const ForwardTable* find_forward_table(const std::string& id) {
  if (id == "T1") return &kT1;
  if (id == "T5") return &kT5;
  return nullptr;
}

const InversionTable* find_inversion_table(const std::string& id) {
  if (id == "T4") return &kT4;
  if (id == "T6") return &kT6;
  if (id == "T7") return &kT7;
  if (id == "T8") return &kT8;
  return nullptr;
}

}  // namespace torsion_cli
