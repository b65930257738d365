#pragma once

// Oracles and constructions shared by the unit and acceptance tests.

#include <functional>

#include "ttfm/nn/models.hpp"
#include "ttfm/nn/params.hpp"
#include "ttfm/rng.hpp"

namespace ttfm::test {

/// Straight-line sinusoidal encoding, written without the library's helpers.
Vec naive_pe(double t, int dim);

/// Scalar-loop MLP evaluation reading the flat parameter vector directly.
Vec naive_mlp(const nn::MlpSpec& spec, const nn::ParamStore& params, const Vec& input);

Vec naive_teacher(const nn::TeacherNet& net, double t, const Vec& x);
Vec naive_student(const nn::StudentAvm& net, double s, double t, const Vec& x);
/// x + (t - s) v_{s,t}(x) through naive_student.
Vec naive_flow(const nn::StudentAvm& net, double s, double t, const Vec& x);

/// Random weights (He-uniform) and random biases of magnitude <= bias_scale.
nn::ParamStore random_params(const nn::MlpSpec& spec, std::uint64_t seed, double bias_scale = 0.1);

/// Sets the network to output the constant c: every weight zero, final bias c.
void make_constant(nn::TimeConditionedNet& net, const Vec& c);

/// Sets the network to output A x exactly in its Jacobian: the hidden layers
/// carry x + 50 (kept positive so ELU is the identity) and the output layer
/// applies A and subtracts 50 A 1. Needs hidden_width >= dim.
void make_linear(nn::TimeConditionedNet& net, const Mat& a);

/// (f(+h) - f(-h)) / (2 h) for a vector-valued function of a scalar offset.
Vec central_diff(const std::function<Vec(double)>& f, double h = 1e-5);

/// ||a - b|| / max(||b||, floor).
double rel_err(const Vec& a, const Vec& b, double floor = 1e-8);

/// log N(y; 0, cov) evaluated from the covariance directly.
double gaussian_logpdf(const Vec& y, const Mat& cov);

/// Random vector with entries U(lo, hi).
Vec random_vec(Rng& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0);

}  // namespace ttfm::test
