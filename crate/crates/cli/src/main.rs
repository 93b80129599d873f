fn main() {
    println!("foldlab placeholder");
}
