use proptest::prelude::*;
use simt_core::{scalar::bit_identical, Device, ElemKind, Error};

#[test]
fn million_value_round_trip() {
    let dev = Device::new();
    let mut s = 0x2545_f491_4f6c_dd1du64;
    let data: Vec<f64> = (0..1_000_000)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            f64::from_bits(s)
        })
        .collect();
    let buf = dev.upload(&data).unwrap();
    let back: Vec<f64> = dev.download(&buf).unwrap();
    assert!(bit_identical(&back, &data));
    dev.free(buf).unwrap();
    assert_eq!(dev.bytes_in_use(), 0);
}

#[test]
fn copies_are_deep() {
    let dev = Device::new();
    let mut host = vec![1.0f32, 2.0, 3.0];
    let buf = dev.upload(&host).unwrap();
    host[0] = 99.0;
    assert_eq!(dev.download::<f32>(&buf).unwrap(), vec![1.0, 2.0, 3.0]);
}

#[test]
fn transfer_errors() {
    let dev = Device::new();
    let d8 = dev.alloc::<f64>(8).unwrap();
    assert!(matches!(
        dev.copy_host_to_device(&[1.0f64; 4], &d8),
        Err(Error::LengthMismatch { .. })
    ));
    assert!(matches!(
        dev.copy_host_to_device(&[1.0f32; 8], &d8),
        Err(Error::KindMismatch { expected: ElemKind::F64, found: ElemKind::F32 })
    ));
    dev.free(d8).unwrap();
    assert!(matches!(dev.free(d8), Err(Error::UseAfterFree { .. })));
    assert!(matches!(dev.copy_host_to_device(&[0.0f64; 8], &d8), Err(Error::UseAfterFree { .. })));
    let mut out = [0.0f64; 8];
    assert!(matches!(dev.copy_device_to_host(&d8, &mut out), Err(Error::UseAfterFree { .. })));
}

#[test]
fn capacity_is_enforced() {
    let dev = Device::with_capacity(1024);
    assert!(matches!(
        dev.alloc::<f64>(200),
        Err(Error::CapacityExceeded { requested: 1600, .. })
    ));
    let a = dev.alloc::<f64>(128).unwrap();
    assert!(dev.alloc::<f32>(1).is_err());
    dev.free(a).unwrap();
    dev.alloc::<f32>(256).unwrap();
}

proptest! {
    #[test]
    fn accounting_matches_live_buffers(ops in prop::collection::vec((0usize..64, any::<bool>(), any::<bool>()), 1..60)) {
        let dev = Device::new();
        let mut live = Vec::new();
        for (len, is_f32, free_one) in ops {
            if free_one && !live.is_empty() {
                let b = live.swap_remove(len % live.len());
                dev.free(b).unwrap();
            } else {
                live.push(if is_f32 { dev.alloc::<f32>(len).unwrap() } else { dev.alloc::<f64>(len).unwrap() });
            }
            let sum: usize = live.iter().map(|b| b.size_bytes()).sum();
            let (allocated, freed) = dev.totals();
            prop_assert_eq!(dev.bytes_in_use(), sum);
            prop_assert_eq!(allocated - freed, sum);
        }
        for b in live {
            dev.free(b).unwrap();
        }
        prop_assert_eq!(dev.bytes_in_use(), 0);
    }

    #[test]
    fn round_trip_is_identity_on_bits(bits in prop::collection::vec(any::<u64>(), 0..300)) {
        let dev = Device::new();
        let v64: Vec<f64> = bits.iter().map(|&b| f64::from_bits(b)).collect();
        let v32: Vec<f32> = bits.iter().map(|&b| f32::from_bits(b as u32)).collect();
        let (b64, b32) = (dev.upload(&v64).unwrap(), dev.upload(&v32).unwrap());
        prop_assert!(bit_identical(&dev.download::<f64>(&b64).unwrap(), &v64));
        prop_assert!(bit_identical(&dev.download::<f32>(&b32).unwrap(), &v32));
    }
}
