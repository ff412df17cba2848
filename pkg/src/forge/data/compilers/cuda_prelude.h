/* Host-side stand-ins for the CUDA language extensions, enough for a
   syntax-only check of single kernels with a plain C++ compiler. */
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>

#define __global__
#define __device__
#define __host__
#define __shared__
#define __constant__
#define __managed__
#define __forceinline__
#define __restrict__

struct uint3 { unsigned int x, y, z; };
struct dim3 {
    unsigned int x, y, z;
    dim3(unsigned int a = 1, unsigned int b = 1, unsigned int c = 1)
        : x(a), y(b), z(c) {}
};

extern uint3 threadIdx, blockIdx;
extern dim3 blockDim, gridDim;
extern int warpSize;

void __syncthreads();
void __syncwarp(unsigned int mask = 0xffffffffu);
void __threadfence();
void __threadfence_block();

template <typename V> V atomicAdd(V *address, V value);
template <typename V> V atomicSub(V *address, V value);
template <typename V> V atomicMax(V *address, V value);
template <typename V> V atomicMin(V *address, V value);
template <typename V> V atomicAnd(V *address, V value);
template <typename V> V atomicOr(V *address, V value);
template <typename V> V atomicXor(V *address, V value);
template <typename V> V atomicExch(V *address, V value);
template <typename V> V atomicCAS(V *address, V compare, V value);

template <typename V> V min(V a, V b);
template <typename V> V max(V a, V b);
