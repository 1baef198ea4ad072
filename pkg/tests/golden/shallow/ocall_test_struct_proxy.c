/* Generated by padguard. Do not edit. */
/* interface: ocall_test_struct, strategy: ShallowVulnerable */
#include "sgx_stub.h"
#include "leaky_types.h"

typedef struct ms_ocall_test_struct_t {
	test_struct ms_ts;
	int ms_val;
} ms_ocall_test_struct_t;

sgx_status_t SGX_CDECL ocall_test_struct(test_struct ts, int val)
{
	sgx_status_t status = SGX_SUCCESS;
	ms_ocall_test_struct_t* ms = NULL;
	size_t ocalloc_size = sizeof(ms_ocall_test_struct_t);
	void *__tmp = NULL;

	__tmp = sgx_ocalloc(ocalloc_size);
	if (__tmp == NULL) {
		sgx_ocfree();
		return SGX_ERROR_UNEXPECTED;
	}
	ms = (ms_ocall_test_struct_t*)__tmp;
	__tmp = (void *)((size_t)__tmp + sizeof(ms_ocall_test_struct_t));
	ms->ms_ts = ts; /* whole-struct copy, padding included */
	ms->ms_val = val;
	status = sgx_ocall(0, ms);
	sgx_ocfree();
	return status;
}
