/* Generated by padguard. Do not edit. */
#ifndef LEAKY_TYPES_H
#define LEAKY_TYPES_H

#include <stddef.h>
#include <stdint.h>

#pragma pack(1)
typedef struct test_struct {
	uint64_t val1;
	uint8_t val2;
	uint64_t val3;
} test_struct;
#pragma pack()

#endif /* LEAKY_TYPES_H */
