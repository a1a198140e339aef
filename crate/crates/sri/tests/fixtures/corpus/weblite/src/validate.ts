export interface FieldError {
  field: string;
  message: string;
}

export function validateUser(input: Record<string, unknown>): FieldError[] {
  const errors: FieldError[] = [];
  const name = input["name"];
  if (typeof name !== "string" || name.trim() === "") {
    errors.push({ field: "name", message: "name is required" });
  }
  const email = input["email"];
  if (typeof email !== "string" || !/^[^@\s]+@[^@\s]+$/.test(email)) {
    errors.push({ field: "email", message: "email is invalid" });
  }
  const age = input["age"];
  if (age !== undefined) {
    if (typeof age !== "number" || age < 0 || age > 150) {
      errors.push({ field: "age", message: "age is out of range" });
    }
  }
  return errors;
}
