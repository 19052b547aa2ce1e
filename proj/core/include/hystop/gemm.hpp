#pragma once

namespace hystop {

/// C += A[M,K] * B[K,N]; all row-major, C preallocated.
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c);

/// C += A^T * B with A stored [K,M]: C[i,j] += sum_k A[k,i] * B[k,j].
void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c);

/// C += A * B^T with B stored [N,K]: C[i,j] += sum_k A[i,k] * B[j,k].
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c);

} // namespace hystop
